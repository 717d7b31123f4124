//! The parallel-update transition kernel.
//!
//! Each site of `Λ` is redrawn independently given the previous
//! configuration, with
//! `p_i(s | η) = ½ [1 + s · tanh(β Σ_j k(i−j) η̃_j + β h)]`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    extend_with_norm, local_field, BoundaryCondition, ExtendedConfig, LatticeBox, PcaParams, Site, Spin, SpinConfig,
    Stencil,
};
use crate::rng::UniformSource;

/// `½(1 + s·tanh x)` for the scaled field `x = β m`.
///
/// Written as a logistic function so the small probability keeps full
/// relative precision; for `|x| ≳ 18` the large one rounds to `1.0`.
#[inline]
pub fn spin_prob(s: Spin, x: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * s.as_f64() * x).exp())
}

/// `log ½(1 + s·tanh x) = s·x − log(2 cosh x)`, finite for every finite `x`.
#[inline]
pub fn log_spin_prob(s: Spin, x: f64) -> f64 {
    s.as_f64() * x - log_two_cosh(x)
}

/// `log(2 cosh x)` without overflow.
#[inline]
pub fn log_two_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// `log cosh x` without overflow.
#[inline]
pub fn log_cosh(x: f64) -> f64 {
    log_two_cosh(x) - std::f64::consts::LN_2
}

/// Everything needed to evaluate `P_Λ^τ` or `P_Λ^per` on one box.
#[derive(Clone, Debug)]
pub struct TransitionContext {
    params: PcaParams,
    region: LatticeBox,
    bc: BoundaryCondition,
    margin: usize,
    stencil: Stencil,
    padded_index: Vec<usize>,
}

impl TransitionContext {
    /// Validates that `bc` provides every exterior spin the kernel reaches.
    pub fn new(params: PcaParams, region: LatticeBox, bc: BoundaryCondition) -> Result<Self> {
        if params.kernel.dim() != region.dim() {
            return Err(Error::DimensionMismatch {
                expected: region.dim(),
                got: params.kernel.dim(),
            });
        }
        let margin = params.kernel.range();
        let probe = SpinConfig::uniform(region.clone(), Spin::Up);
        let ext = extend_with_norm(&probe, &bc, margin, params.norm)?;
        for site in region.sites() {
            for (o, _) in params.kernel.support() {
                ext.get(&site.offset(o))?;
            }
        }
        let stencil = Stencil::new(&params.kernel, ext.padded());
        let padded_index = (0..region.len()).map(|n| ext.padded_index_of_inner(n)).collect();
        Ok(TransitionContext {
            params,
            region,
            bc,
            margin,
            stencil,
            padded_index,
        })
    }

    pub fn params(&self) -> &PcaParams {
        &self.params
    }

    pub fn region(&self) -> &LatticeBox {
        &self.region
    }

    pub fn bc(&self) -> &BoundaryCondition {
        &self.bc
    }

    pub fn extend(&self, config: &SpinConfig) -> ExtendedConfig {
        debug_assert_eq!(config.region(), &self.region);
        extend_with_norm(config, &self.bc, self.margin, self.params.norm)
            .expect("boundary coverage was validated at construction")
    }

    /// Un-scaled local fields `m_i` (including `h`) for every site of `Λ`.
    pub fn fields(&self, config: &SpinConfig) -> Vec<f64> {
        let ext = self.extend(config);
        self.fields_of(&ext)
    }

    fn fields_of(&self, ext: &ExtendedConfig) -> Vec<f64> {
        self.padded_index
            .iter()
            .map(|&p| self.stencil.apply(ext.values(), p) + self.params.h)
            .collect()
    }

    /// `p_i(+1 | η)` for every site of `Λ`.
    pub fn plus_probs(&self, prev: &SpinConfig) -> Vec<f64> {
        let beta = self.params.beta;
        self.fields(prev)
            .into_iter()
            .map(|m| spin_prob(Spin::Up, beta * m))
            .collect()
    }

    /// `P_i(σ_i = s | η)` at a site of `Λ`.
    pub fn site_prob(&self, s: Spin, site: &Site, ext: &ExtendedConfig) -> f64 {
        debug_assert!(self.region.contains(site));
        spin_prob(s, self.params.beta * local_field(site, ext, &self.params))
    }

    /// `log P_Λ(next | prev) = Σ_i log p_i(next_i | prev)`.
    pub fn transition_log_prob(&self, next: &SpinConfig, prev: &SpinConfig) -> f64 {
        debug_assert_eq!(next.region(), prev.region());
        let beta = self.params.beta;
        self.fields(prev)
            .into_iter()
            .zip(next.spins())
            .map(|(m, &s)| log_spin_prob(s, beta * m))
            .sum()
    }

    /// One synchronous update: `next_i = +1` iff `u_i < p_i(+1 | prev)`,
    /// with `u_i` drawn from `source` at address `(step, i)`.
    pub fn step_sample(&self, prev: &SpinConfig, step: u64, source: &dyn UniformSource) -> SpinConfig {
        let ext = self.extend(prev);
        let mut spins = vec![Spin::Down; self.region.len()];
        self.update_range(&ext, step, source, 0, &mut spins);
        SpinConfig::new(self.region.clone(), spins).expect("same box")
    }

    /// Same as [`step_sample`](Self::step_sample), with sites split into
    /// chunks of `chunk` updated on the rayon pool. Results are identical.
    pub fn step_sample_parallel(
        &self,
        prev: &SpinConfig,
        step: u64,
        source: &dyn UniformSource,
        chunk: usize,
    ) -> SpinConfig {
        let ext = self.extend(prev);
        let mut spins = vec![Spin::Down; self.region.len()];
        spins
            .par_chunks_mut(chunk.max(1))
            .enumerate()
            .for_each(|(c, out)| self.update_range(&ext, step, source, c * chunk.max(1), out));
        SpinConfig::new(self.region.clone(), spins).expect("same box")
    }

    fn update_range(
        &self,
        ext: &ExtendedConfig,
        step: u64,
        source: &dyn UniformSource,
        first: usize,
        out: &mut [Spin],
    ) {
        let mut u = vec![0.0; out.len()];
        source.fill(step, first, &mut u);
        let beta = self.params.beta;
        for (k, slot) in out.iter_mut().enumerate() {
            let p = self.padded_index[first + k];
            let m = self.stencil.apply(ext.values(), p) + self.params.h;
            *slot = Spin::from_bit(u[k] < spin_prob(Spin::Up, beta * m));
        }
    }
}
