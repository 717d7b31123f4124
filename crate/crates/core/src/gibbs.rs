//! The log-cosh potential, finite-volume Hamiltonians and Gibbs measures,
//! the closed-form stationary laws, and the spin-flip transformations that
//! map sign patterns of the kernel onto each other.
//!
//! Weights are kept in the log domain; tables are normalized with a
//! max-shifted exponential.

use crate::dynamics::{log_cosh, TransitionContext};
use crate::error::{Error, Result};
use crate::exact::{table_from_log_weights, Distribution};
use crate::model::{
    extend_available, BoundaryCondition, CouplingKernel, ExtendedConfig, LatticeBox, PcaParams, Site, Spin, SpinConfig,
    Tau,
};

/// The shift-invariant potential
/// `Φ_{i}(σ) = −βhσ_i`, `Φ_{U_i}(σ) = −log cosh[β Σ_j k(i−j)σ_j + βh]`,
/// with `U_i = {j : k(i−j) ≠ 0}` and every other `Φ_A ≡ 0`.
#[derive(Clone, Debug)]
pub struct Potential {
    params: PcaParams,
}

impl Potential {
    pub fn new(params: PcaParams) -> Self {
        Potential { params }
    }

    pub fn params(&self) -> &PcaParams {
        &self.params
    }

    pub fn singleton(&self, spin: Spin) -> f64 {
        -self.params.beta * self.params.h * spin.as_f64()
    }

    /// `Φ_{U_i}` evaluated on the completed configuration.
    pub fn neighborhood(&self, site: &Site, ext: &ExtendedConfig) -> Result<f64> {
        Ok(-log_cosh(self.params.beta * ext.field(site, &self.params)?))
    }

    /// `U_i`, in lexicographic order.
    pub fn neighborhood_set(&self, site: &Site) -> Vec<Site> {
        self.params.kernel.support().map(|(o, _)| site.offset(o)).collect()
    }

    /// Whether `U_i` meets `Λ`.
    fn touches(&self, site: &Site, region: &LatticeBox) -> bool {
        self.params
            .kernel
            .support()
            .any(|(o, _)| region.contains(&site.offset(o)))
    }
}

/// `H_Λ^τ(σ) = Σ_{A ∩ Λ ≠ ∅} Φ_A(σ_Λ τ_{Λ^c})`, or its torus version
/// `Σ_{i∈Λ} [Φ_{i} + Φ_{U_i}]` under periodic boundary conditions.
pub fn hamiltonian(config: &SpinConfig, bc: &BoundaryCondition, potential: &Potential) -> Result<f64> {
    let region = config.region();
    let range = potential.params.kernel.range();
    let singletons: f64 = config.spins().iter().map(|&s| potential.singleton(s)).sum();
    match bc {
        BoundaryCondition::Periodic => {
            let ext = extend_available(config, bc, range);
            let mut h = singletons;
            for site in region.sites() {
                h += potential.neighborhood(&site, &ext)?;
            }
            Ok(h)
        }
        BoundaryCondition::Fixed(_) => {
            let ext = extend_available(config, bc, 2 * range);
            let mut h = singletons;
            for site in region.padded(range).sites() {
                if potential.touches(&site, region) {
                    h += potential.neighborhood(&site, &ext)?;
                }
            }
            Ok(h)
        }
    }
}

/// Normalized `exp(−H_Λ)` over all configurations of `region`.
pub fn gibbs_table(region: &LatticeBox, bc: &BoundaryCondition, params: &PcaParams) -> Result<Distribution> {
    let potential = Potential::new(params.clone());
    table_from_log_weights(region, |cfg| hamiltonian(cfg, bc, &potential).map(|h| -h))
}

/// Product form of the finite-volume Gibbs measure,
/// `Π_{i : dist(i,Λ) ≤ R} cosh[β Σ_j k(i−j)σ̃_j + βh] e^{βhσ̃_i}`, in log.
/// On a torus the product runs over `Λ` only.
///
/// Sites outside `Λ` contribute factors that do not depend on `σ_Λ` when
/// their neighbourhood misses `Λ`; they cancel on normalization.
pub fn log_gibbs_product_weight(config: &SpinConfig, bc: &BoundaryCondition, params: &PcaParams) -> Result<f64> {
    let region = config.region();
    let range = params.kernel.range();
    let beta = params.beta;
    let ext = extend_available(config, bc, 2 * range);
    let mut total = 0.0;
    let reach = if bc.is_periodic() { 0 } else { range };
    for site in region.padded(reach).sites() {
        if region.dist(&site, params.norm) > reach as f64 {
            continue;
        }
        let m = ext.field(&site, params)?;
        total += log_cosh(beta * m) + beta * params.h * ext.get(&site)?.as_f64();
    }
    Ok(total)
}

pub fn gibbs_product_table(region: &LatticeBox, bc: &BoundaryCondition, params: &PcaParams) -> Result<Distribution> {
    table_from_log_weights(region, |cfg| log_gibbs_product_weight(cfg, bc, params))
}

/// The closed-form stationary law of `P_Λ^τ`:
/// `Π_{i∈Λ} e^{βhσ_i} cosh[β Σ_j k(i−j)σ̃_j + βh] e^{βσ_i Σ_{j∉Λ} k(i−j)τ_j}`.
#[derive(Clone, Debug)]
pub struct StationaryMeasure {
    ctx: TransitionContext,
    // Σ_{j∉Λ} k(i−j) τ_j, one entry per site of Λ
    exterior_field: Vec<f64>,
}

impl StationaryMeasure {
    pub fn new(ctx: &TransitionContext) -> Result<Self> {
        let BoundaryCondition::Fixed(_) = ctx.bc() else {
            return Err(Error::InvalidParameter(
                "the fixed-boundary stationary weight needs a fixed boundary condition".into(),
            ));
        };
        let region = ctx.region();
        let ext = ctx.extend(&SpinConfig::uniform(region.clone(), Spin::Up));
        let mut exterior_field = Vec::with_capacity(region.len());
        for site in region.sites() {
            let mut f = 0.0;
            for (o, w) in ctx.params().kernel.support() {
                let j = site.offset(o);
                if !region.contains(&j) {
                    f += w * ext.get(&j)?.as_f64();
                }
            }
            exterior_field.push(f);
        }
        Ok(StationaryMeasure {
            ctx: ctx.clone(),
            exterior_field,
        })
    }

    pub fn log_weight(&self, config: &SpinConfig) -> f64 {
        let p = self.ctx.params();
        self.ctx
            .fields(config)
            .iter()
            .zip(config.spins())
            .zip(&self.exterior_field)
            .map(|((&m, s), &ext)| {
                let s = s.as_f64();
                p.beta * p.h * s + log_cosh(p.beta * m) + p.beta * s * ext
            })
            .sum()
    }

    /// Unnormalized weight; may overflow for large boxes, see [`log_weight`](Self::log_weight).
    pub fn weight(&self, config: &SpinConfig) -> f64 {
        self.log_weight(config).exp()
    }

    pub fn table(&self) -> Result<Distribution> {
        table_from_log_weights(self.ctx.region(), |cfg| Ok(self.log_weight(cfg)))
    }
}

/// `log` of `Π_{i∈Λ} cosh[β Σ_j k(i−j)σ̃_j + βh] e^{βhσ_i}` with `σ̃` the
/// periodic continuation.
pub fn log_periodic_stationary_weight(config: &SpinConfig, params: &PcaParams) -> Result<f64> {
    let ctx = TransitionContext::new(params.clone(), config.region().clone(), BoundaryCondition::Periodic)?;
    Ok(periodic_log_weight_in(&ctx, config))
}

fn periodic_log_weight_in(ctx: &TransitionContext, config: &SpinConfig) -> f64 {
    let p = ctx.params();
    ctx.fields(config)
        .iter()
        .zip(config.spins())
        .map(|(&m, s)| log_cosh(p.beta * m) + p.beta * p.h * s.as_f64())
        .sum()
}

pub fn periodic_stationary_weight(config: &SpinConfig, params: &PcaParams) -> Result<f64> {
    log_periodic_stationary_weight(config, params).map(f64::exp)
}

pub fn periodic_stationary_table(region: &LatticeBox, params: &PcaParams) -> Result<Distribution> {
    let ctx = TransitionContext::new(params.clone(), region.clone(), BoundaryCondition::Periodic)?;
    table_from_log_weights(region, |cfg| Ok(periodic_log_weight_in(&ctx, cfg)))
}

/// Closed-form stationary law for whichever boundary condition `ctx` carries.
pub fn stationary_table(ctx: &TransitionContext) -> Result<Distribution> {
    match ctx.bc() {
        BoundaryCondition::Periodic => periodic_stationary_table(ctx.region(), ctx.params()),
        BoundaryCondition::Fixed(_) => StationaryMeasure::new(ctx)?.table(),
    }
}

/// Sign pattern handled by a spin-flip transformation of the plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformCase {
    /// `k*(0) = −k(0)`, flip the odd sublattice.
    FlipSelfCoupling,
    /// `k*(e2) = −k(e2)`, flip the odd rows.
    FlipVerticalCoupling,
}

impl TryFrom<u8> for TransformCase {
    type Error = Error;

    fn try_from(tag: u8) -> Result<Self> {
        match tag {
            2 => Ok(TransformCase::FlipSelfCoupling),
            3 => Ok(TransformCase::FlipVerticalCoupling),
            other => Err(Error::UnsupportedCase(other)),
        }
    }
}

/// The involution `T` on planar configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpinMap {
    /// `(Tσ)_i = −σ_i` for `x + y` odd.
    FlipOddSublattice,
    /// `(Tσ)_i = −σ_i` for `y` odd.
    FlipOddRows,
}

impl SpinMap {
    pub fn flips(self, site: &Site) -> bool {
        let c = site.coords();
        match self {
            SpinMap::FlipOddSublattice => (c[0] + c[1]).rem_euclid(2) == 1,
            SpinMap::FlipOddRows => c[1].rem_euclid(2) == 1,
        }
    }

    pub fn apply_spin(self, site: &Site, spin: Spin) -> Spin {
        if self.flips(site) {
            spin.flipped()
        } else {
            spin
        }
    }

    pub fn apply(self, config: &SpinConfig) -> SpinConfig {
        let region = config.region();
        SpinConfig::from_fn(region.clone(), |s| {
            self.apply_spin(s, config.get(s).expect("site of the box"))
        })
    }

    /// Canonical index of `Tσ` for every index `σ` of `region`.
    pub fn index_permutation(self, region: &LatticeBox) -> Vec<usize> {
        let mask: u64 = region
            .sites()
            .enumerate()
            .filter(|(_, s)| self.flips(s))
            .fold(0, |m, (n, _)| m | 1 << n);
        (0..1u64 << region.len()).map(|code| (code ^ mask) as usize).collect()
    }

    /// `Tτ` as an explicit assignment on the frame of width `width` around `region`.
    pub fn apply_tau(self, tau: &Tau, region: &LatticeBox, width: usize) -> Result<Tau> {
        let frame: Vec<Site> = region.padded(width).sites().filter(|s| !region.contains(s)).collect();
        let mut out = std::collections::BTreeMap::new();
        for site in frame {
            let spin = tau.get(&site).ok_or_else(|| Error::MissingBoundarySpin(site.clone()))?;
            out.insert(site.clone(), self.apply_spin(&site, spin));
        }
        Ok(Tau::Sites(out))
    }

    pub fn apply_bc(self, bc: &BoundaryCondition, region: &LatticeBox, width: usize) -> Result<BoundaryCondition> {
        match bc {
            BoundaryCondition::Periodic => Ok(BoundaryCondition::Periodic),
            BoundaryCondition::Fixed(tau) => Ok(BoundaryCondition::Fixed(self.apply_tau(tau, region, width)?)),
        }
    }
}

/// Kernel `k*` and involution `T` with `μ_{Λ,Φ}^τ(σ) = μ_{Λ,Φ*}^{Tτ}(Tσ)`
/// (for `h = 0`).
pub fn transform_model(case: TransformCase, kernel: &CouplingKernel) -> Result<(CouplingKernel, SpinMap)> {
    if kernel.dim() != 2 {
        return Err(Error::NotTwoDimensional(kernel.dim()));
    }
    let (k0, k1, k2) = kernel.nearest_neighbor_weights().ok_or(Error::NotNearestNeighbor)?;
    Ok(match case {
        TransformCase::FlipSelfCoupling => (
            CouplingKernel::nearest_neighbor_2d(-k0, k1, k2),
            SpinMap::FlipOddSublattice,
        ),
        TransformCase::FlipVerticalCoupling => (CouplingKernel::nearest_neighbor_2d(k0, k1, -k2), SpinMap::FlipOddRows),
    })
}
