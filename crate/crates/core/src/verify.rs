//! Families of exact checks run over lists of small instances. Each check
//! reports a residual next to its tolerance; the CLI and the test suites
//! print these as rows.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::TransitionContext;
use crate::error::{Error, Result};
use crate::exact::{
    build_matrix, detailed_balance_residual, entropy_production, ising_correspondence_check, relative_entropy,
    stationary_distribution, sublattice_factorization_defect, Distribution,
};
use crate::gibbs::{
    gibbs_product_table, gibbs_table, periodic_stationary_table, stationary_table, transform_model, TransformCase,
};
use crate::model::{BoundaryCondition, CouplingKernel, LatticeBox, PcaParams, Spin, Tau};

/// A box, a boundary condition and model parameters.
#[derive(Clone, Debug)]
pub struct Instance {
    pub region: LatticeBox,
    pub bc: BoundaryCondition,
    pub params: PcaParams,
}

impl Instance {
    pub fn new(region: LatticeBox, bc: BoundaryCondition, params: PcaParams) -> Self {
        Instance { region, bc, params }
    }

    pub fn context(&self) -> Result<TransitionContext> {
        TransitionContext::new(self.params.clone(), self.region.clone(), self.bc.clone())
    }

    pub fn with_params(&self, params: PcaParams) -> Instance {
        Instance { params, ..self.clone() }
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} beta={:.6} h={:.6} k={}",
            self.region.describe(),
            self.bc.describe(),
            self.params.beta,
            self.params.h,
            self.params.kernel.describe()
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckFamily {
    DetailedBalance,
    Stationarity,
    PeriodicIdentity,
    GibbsRoutes,
    EntropyProduction,
    EntropyMonotonicity,
    Transform,
    Ising,
}

impl CheckFamily {
    pub const ALL: [CheckFamily; 8] = [
        CheckFamily::DetailedBalance,
        CheckFamily::Stationarity,
        CheckFamily::PeriodicIdentity,
        CheckFamily::GibbsRoutes,
        CheckFamily::EntropyProduction,
        CheckFamily::EntropyMonotonicity,
        CheckFamily::Transform,
        CheckFamily::Ising,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckFamily::DetailedBalance => "detailed-balance",
            CheckFamily::Stationarity => "stationarity",
            CheckFamily::PeriodicIdentity => "periodic-identity",
            CheckFamily::GibbsRoutes => "gibbs-routes",
            CheckFamily::EntropyProduction => "entropy-production",
            CheckFamily::EntropyMonotonicity => "entropy-monotonicity",
            CheckFamily::Transform => "transform",
            CheckFamily::Ising => "ising",
        }
    }
}

impl fmt::Display for CheckFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckFamily::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown check family '{s}'")))
    }
}

/// Whether a residual must stay below its tolerance or exceed it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expect {
    AtMost,
    Above,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub family: CheckFamily,
    pub name: String,
    pub instance: String,
    pub residual: f64,
    pub tolerance: f64,
    pub expect: Expect,
}

impl CheckResult {
    fn new(family: CheckFamily, name: &str, instance: impl ToString, residual: f64, tolerance: f64) -> Self {
        CheckResult {
            family,
            name: name.to_string(),
            instance: instance.to_string(),
            residual,
            tolerance,
            expect: Expect::AtMost,
        }
    }

    fn above(mut self) -> Self {
        self.expect = Expect::Above;
        self
    }

    pub fn passed(&self) -> bool {
        match self.expect {
            Expect::AtMost => self.residual <= self.tolerance,
            Expect::Above => self.residual > self.tolerance,
        }
    }
}

pub const REVERSIBILITY_TOL: f64 = 1e-12;
pub const STATIONARITY_TOL: f64 = 1e-12;
pub const TABLE_TOL: f64 = 1e-12;
pub const ENTROPY_TOL: f64 = 1e-10;
pub const FACTORIZATION_CONTROL: f64 = 1e-3;

fn random_params<R: Rng>(rng: &mut R, h_range: f64) -> PcaParams {
    let beta = 2.0 * (1.0 - rng.random::<f64>());
    let h = h_range * (2.0 * rng.random::<f64>() - 1.0);
    let mut k = || 3.0 * rng.random::<f64>() - 1.5;
    let kernel = CouplingKernel::nearest_neighbor_2d(k(), k(), k());
    PcaParams::new(beta, h, kernel).expect("finite parameters")
}

/// Twenty instances on boxes from 1×1 to 3×3, cycling through plus, minus,
/// random fixed and periodic boundaries, with `β ∈ (0, 2]`, `h ∈ [−1, 1]`
/// and random symmetric nearest-neighbour kernels.
pub fn randomized_instances(seed: u64) -> Vec<Instance> {
    let shapes: [[usize; 2]; 9] = [[1, 1], [1, 2], [2, 1], [2, 2], [1, 3], [3, 1], [2, 3], [3, 2], [3, 3]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..20)
        .map(|n| {
            let region = LatticeBox::new(&shapes[n % shapes.len()]).expect("valid box");
            let bc = match n % 4 {
                0 => BoundaryCondition::plus(),
                1 => BoundaryCondition::minus(),
                2 => BoundaryCondition::Fixed(Tau::random(&region, 2, &mut rng)),
                _ => BoundaryCondition::Periodic,
            };
            Instance::new(region, bc, random_params(&mut rng, 1.0))
        })
        .collect()
}

/// Ten parameter draws on each of the 2×2 and 3×3 tori.
pub fn torus_instances(seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7075);
    [[2usize, 2], [3, 3]]
        .iter()
        .flat_map(|sides| {
            let region = LatticeBox::new(sides).expect("valid box");
            (0..10)
                .map(|_| {
                    Instance::new(
                        region.clone(),
                        BoundaryCondition::Periodic,
                        random_params(&mut rng, 1.0),
                    )
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// `detailed-balance`: relative residual of the closed-form stationary law.
pub fn check_detailed_balance(inst: &Instance) -> Result<CheckResult> {
    let ctx = inst.context()?;
    let p = build_matrix(&ctx)?;
    let nu = stationary_table(&ctx)?;
    let r = detailed_balance_residual(&p, &nu).relative();
    Ok(CheckResult::new(
        CheckFamily::DetailedBalance,
        "detailed-balance",
        inst,
        r,
        REVERSIBILITY_TOL,
    ))
}

/// `stationarity`: `‖νP − ν‖_TV` for the closed-form law, and the distance
/// from the power-iteration law to it.
pub fn check_stationarity(inst: &Instance) -> Result<Vec<CheckResult>> {
    let ctx = inst.context()?;
    let p = build_matrix(&ctx)?;
    let nu = stationary_table(&ctx)?;
    let numeric = stationary_distribution(&p)?;
    Ok(vec![
        CheckResult::new(
            CheckFamily::Stationarity,
            "closed-form-invariance",
            inst,
            p.push_forward(&nu).tv_distance(&nu),
            STATIONARITY_TOL,
        ),
        CheckResult::new(
            CheckFamily::Stationarity,
            "power-iteration",
            inst,
            numeric.tv_distance(&nu),
            ENTROPY_TOL,
        ),
    ])
}

/// `periodic-identity`: the periodic stationary law equals the periodic
/// Gibbs measure.
pub fn check_periodic_identity(inst: &Instance) -> Result<CheckResult> {
    if !inst.bc.is_periodic() {
        return Err(Error::InvalidParameter(
            "the periodic identity needs a periodic instance".into(),
        ));
    }
    let nu = periodic_stationary_table(&inst.region, &inst.params)?;
    let mu = gibbs_table(&inst.region, &inst.bc, &inst.params)?;
    Ok(CheckResult::new(
        CheckFamily::PeriodicIdentity,
        "periodic-identity",
        inst,
        nu.max_abs_diff(&mu),
        TABLE_TOL,
    ))
}

/// `gibbs-routes`: Hamiltonian route against the cosh product route.
pub fn check_gibbs_routes(inst: &Instance) -> Result<CheckResult> {
    let a = gibbs_table(&inst.region, &inst.bc, &inst.params)?;
    let b = gibbs_product_table(&inst.region, &inst.bc, &inst.params)?;
    Ok(CheckResult::new(
        CheckFamily::GibbsRoutes,
        "gibbs-routes",
        inst,
        a.max_abs_diff(&b),
        TABLE_TOL,
    ))
}

fn random_distribution<R: Rng>(region: &LatticeBox, rng: &mut R) -> Result<Distribution> {
    let n = 1usize << region.len();
    // exponential weights give a uniform draw on the simplex
    let w = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    Distribution::from_weights(region.clone(), w)
}

/// `entropy-production` and `entropy-monotonicity` for `starts` random
/// initial laws: the one-step identity gap, and the largest increase of
/// `h(P^t ν | μ)` over `steps` iterations.
pub fn check_entropy(inst: &Instance, starts: usize, steps: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let ctx = inst.context()?;
    let p = build_matrix(&ctx)?;
    let mu = stationary_table(&ctx)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for start in 0..starts {
        let nu = random_distribution(&inst.region, &mut rng)?;
        let ep = entropy_production(&nu, &p, &mu)?;
        let label = format!("{inst} start={start}");
        let negative = (-ep.lhs).max(-ep.rhs).max(0.0);
        out.push(CheckResult::new(
            CheckFamily::EntropyProduction,
            "identity-gap",
            &label,
            ep.gap().max(negative),
            ENTROPY_TOL,
        ));

        let mut current = nu;
        let mut h = relative_entropy(&current, &mu)?;
        let mut worst_increase = 0.0f64;
        for _ in 0..steps {
            current = p.push_forward(&current);
            let next = relative_entropy(&current, &mu)?;
            worst_increase = worst_increase.max(next - h);
            h = next;
        }
        out.push(CheckResult::new(
            CheckFamily::EntropyMonotonicity,
            "kl-increase",
            &label,
            worst_increase,
            0.0,
        ));
    }
    Ok(out)
}

/// `transform` (Gibbs part): `μ_{Λ,Φ}^τ(σ) = μ_{Λ,Φ*}^{Tτ}(Tσ)`, at `h = 0`.
pub fn check_transform_gibbs(inst: &Instance, case: TransformCase) -> Result<CheckResult> {
    zero_field(inst)?;
    let (kernel, map) = transform_model(case, &inst.params.kernel)?;
    let width = 2 * inst.params.kernel.range().max(1);
    let bc_star = map.apply_bc(&inst.bc, &inst.region, width)?;
    let mu = gibbs_table(&inst.region, &inst.bc, &inst.params)?;
    let mu_star = gibbs_table(&inst.region, &bc_star, &inst.params.with_kernel(kernel))?;
    let image = mu.permuted(&map.index_permutation(&inst.region));
    Ok(CheckResult::new(
        CheckFamily::Transform,
        &format!("gibbs-case-{}", case_tag(case)),
        inst,
        image.max_abs_diff(&mu_star),
        TABLE_TOL,
    ))
}

/// `transform` (dynamics part): the stationary law of the transformed PCA,
/// found by power iteration, against the `T`-image of the original one.
pub fn check_transform_stationary(inst: &Instance, case: TransformCase) -> Result<CheckResult> {
    zero_field(inst)?;
    let (kernel, map) = transform_model(case, &inst.params.kernel)?;
    let width = inst.params.kernel.range().max(1);
    let bc_star = map.apply_bc(&inst.bc, &inst.region, width)?;
    let nu = stationary_distribution(&build_matrix(&inst.context()?)?)?;
    let star = Instance::new(inst.region.clone(), bc_star, inst.params.with_kernel(kernel));
    let nu_star = stationary_distribution(&build_matrix(&star.context()?)?)?;
    let image = nu.permuted(&map.index_permutation(&inst.region));
    Ok(CheckResult::new(
        CheckFamily::Transform,
        &format!("stationary-case-{}", case_tag(case)),
        inst,
        image.max_abs_diff(&nu_star),
        ENTROPY_TOL,
    ))
}

fn case_tag(case: TransformCase) -> u8 {
    match case {
        TransformCase::FlipSelfCoupling => 2,
        TransformCase::FlipVerticalCoupling => 3,
    }
}

fn zero_field(inst: &Instance) -> Result<()> {
    if inst.params.h != 0.0 {
        return Err(Error::InvalidParameter("spin-flip transforms need h = 0".into()));
    }
    Ok(())
}

/// `ising`: marginal identity and both factorization defects.
pub fn check_ising(inst: &Instance) -> Result<Vec<CheckResult>> {
    let r = ising_correspondence_check(&inst.region, &inst.bc, &inst.params)?;
    Ok(vec![
        CheckResult::new(
            CheckFamily::Ising,
            "even-marginal",
            inst,
            r.marginal_deviation,
            TABLE_TOL,
        ),
        CheckResult::new(
            CheckFamily::Ising,
            "stationary-independence",
            inst,
            r.stationary_factorization_defect,
            TABLE_TOL,
        ),
        CheckResult::new(
            CheckFamily::Ising,
            "gibbs-independence",
            inst,
            r.gibbs_factorization_defect,
            TABLE_TOL,
        ),
    ])
}

/// `ising` control: with `k(0) ≠ 0` the stationary law must not factorize.
pub fn check_ising_control(inst: &Instance) -> Result<CheckResult> {
    let nu = stationary_table(&inst.context()?)?;
    Ok(CheckResult::new(
        CheckFamily::Ising,
        "control-dependence",
        inst,
        sublattice_factorization_defect(&nu)?,
        FACTORIZATION_CONTROL,
    )
    .above())
}

fn params(beta: f64, k: (f64, f64, f64)) -> PcaParams {
    PcaParams::new(beta, 0.0, CouplingKernel::nearest_neighbor_2d(k.0, k.1, k.2)).expect("valid parameters")
}

fn sq(a: usize, b: usize) -> LatticeBox {
    LatticeBox::new(&[a, b]).expect("valid box")
}

/// Instances for the Gibbs side of the transforms: 3×3 boxes, `h = 0`.
pub fn transform_gibbs_instances(seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7472);
    let mut out = vec![
        Instance::new(sq(3, 3), BoundaryCondition::plus(), params(0.8, (0.5, 1.0, 0.7))),
        Instance::new(sq(3, 3), BoundaryCondition::minus(), params(1.3, (-0.4, 0.6, -0.9))),
    ];
    for _ in 0..3 {
        let p = random_params(&mut rng, 0.0);
        let tau = Tau::random(&sq(3, 3), 2, &mut rng);
        out.push(Instance::new(sq(3, 3), BoundaryCondition::Fixed(tau), p));
    }
    out.push(Instance::new(
        sq(2, 2),
        BoundaryCondition::Periodic,
        params(0.9, (0.3, 0.8, -0.6)),
    ));
    out
}

/// Instances for the dynamical side of the transforms: even-sided tori, `h = 0`.
pub fn transform_stationary_instances(seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7473);
    let mut out = vec![Instance::new(
        sq(2, 2),
        BoundaryCondition::Periodic,
        params(0.8, (0.5, 1.0, 0.7)),
    )];
    for sides in [(2, 4), (4, 2)] {
        out.push(Instance::new(
            sq(sides.0, sides.1),
            BoundaryCondition::Periodic,
            random_params(&mut rng, 0.0),
        ));
    }
    out
}

/// Instances with `k(0) = 0` for the Ising correspondence.
pub fn ising_instances(seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6973);
    vec![
        Instance::new(sq(3, 3), BoundaryCondition::plus(), params(0.7, (0.0, 1.0, 1.0))),
        Instance::new(sq(3, 3), BoundaryCondition::plus(), params(0.7, (0.0, 1.0, 0.3))),
        Instance::new(sq(3, 3), BoundaryCondition::minus(), params(1.1, (0.0, -0.8, 0.5))),
        Instance::new(
            sq(3, 3),
            BoundaryCondition::Fixed(Tau::random(&sq(3, 3), 2, &mut rng)),
            params(0.9, (0.0, 1.2, 0.6)),
        ),
        Instance::new(sq(2, 4), BoundaryCondition::Periodic, params(0.6, (0.0, 1.0, 0.4))),
    ]
}

pub fn ising_control_instance() -> Instance {
    Instance::new(sq(3, 3), BoundaryCondition::plus(), params(0.3, (0.5, 1.0, 1.0)))
}

/// Runs `family` over the built-in suite generated from `seed`.
pub fn default_suite(family: CheckFamily, seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    match family {
        CheckFamily::DetailedBalance => {
            for inst in randomized_instances(seed).iter().chain(&torus_instances(seed)) {
                out.push(check_detailed_balance(inst)?);
            }
        }
        CheckFamily::Stationarity => {
            for inst in randomized_instances(seed) {
                out.extend(check_stationarity(&inst)?);
            }
        }
        CheckFamily::PeriodicIdentity => {
            for inst in torus_instances(seed) {
                out.push(check_periodic_identity(&inst)?);
            }
        }
        CheckFamily::GibbsRoutes => {
            for inst in randomized_instances(seed).iter().chain(&torus_instances(seed)) {
                out.push(check_gibbs_routes(inst)?);
            }
        }
        CheckFamily::EntropyProduction | CheckFamily::EntropyMonotonicity => {
            let torus = Instance::new(sq(2, 2), BoundaryCondition::Periodic, {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6570);
                random_params(&mut rng, 1.0)
            });
            out.extend(
                check_entropy(&torus, 10, 50, seed)?
                    .into_iter()
                    .filter(|r| r.family == family),
            );
        }
        CheckFamily::Transform => {
            for case in [TransformCase::FlipSelfCoupling, TransformCase::FlipVerticalCoupling] {
                for inst in transform_gibbs_instances(seed) {
                    out.push(check_transform_gibbs(&inst, case)?);
                }
                for inst in transform_stationary_instances(seed) {
                    out.push(check_transform_stationary(&inst, case)?);
                }
            }
        }
        CheckFamily::Ising => {
            for inst in ising_instances(seed) {
                out.extend(check_ising(&inst)?);
            }
            out.push(check_ising_control(&ising_control_instance())?);
        }
    }
    Ok(out)
}

/// A family left out of [`instance_suite`], with the reason.
pub type Skipped = (CheckFamily, String);

/// Runs every applicable family on one configured instance. Families whose
/// preconditions the instance does not meet are skipped and named in the
/// second element.
pub fn instance_suite(
    inst: &Instance,
    families: &[CheckFamily],
    seed: u64,
) -> Result<(Vec<CheckResult>, Vec<Skipped>)> {
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    let nn = inst.params.kernel.nearest_neighbor_weights();
    for &family in families {
        let skip = |why: &str| (family, why.to_string());
        match family {
            CheckFamily::DetailedBalance => out.push(check_detailed_balance(inst)?),
            CheckFamily::Stationarity => out.extend(check_stationarity(inst)?),
            CheckFamily::PeriodicIdentity if inst.bc.is_periodic() => out.push(check_periodic_identity(inst)?),
            CheckFamily::PeriodicIdentity => skipped.push(skip("needs a periodic boundary")),
            CheckFamily::GibbsRoutes => out.push(check_gibbs_routes(inst)?),
            CheckFamily::EntropyProduction | CheckFamily::EntropyMonotonicity => out.extend(
                check_entropy(inst, 10, 50, seed)?
                    .into_iter()
                    .filter(|r| r.family == family),
            ),
            CheckFamily::Transform => {
                if inst.params.h != 0.0 || nn.is_none() {
                    skipped.push(skip("needs h = 0 and a nearest-neighbour planar kernel"));
                    continue;
                }
                let even = inst.region.sides().iter().all(|s| s % 2 == 0);
                if inst.bc.is_periodic() && !even {
                    skipped.push(skip("the sublattice flips need even sides on a torus"));
                    continue;
                }
                for case in [TransformCase::FlipSelfCoupling, TransformCase::FlipVerticalCoupling] {
                    out.push(check_transform_gibbs(inst, case)?);
                    if inst.bc.is_periodic() {
                        out.push(check_transform_stationary(inst, case)?);
                    }
                }
            }
            CheckFamily::Ising => {
                let odd_torus = inst.bc.is_periodic() && inst.region.sides().iter().any(|s| s % 2 == 1);
                if !matches!(nn, Some((0.0, _, _))) || inst.params.h != 0.0 {
                    skipped.push(skip("needs h = 0 and a nearest-neighbour planar kernel with k(0) = 0"));
                } else if odd_torus || inst.region.len() > 16 {
                    skipped.push(skip("needs at most 16 sites and even sides on a torus"));
                } else {
                    out.extend(check_ising(inst)?);
                }
            }
        }
    }
    Ok((out, skipped))
}

/// The unit spin of a uniform boundary, if any.
pub fn uniform_boundary_spin(bc: &BoundaryCondition) -> Option<Spin> {
    match bc {
        BoundaryCondition::Fixed(Tau::Uniform(s)) => Some(*s),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_names_round_trip() {
        for f in CheckFamily::ALL {
            assert_eq!(f.name().parse::<CheckFamily>().unwrap(), f);
        }
        assert!("nope".parse::<CheckFamily>().is_err());
    }

    #[test]
    fn randomized_instances_cover_shapes_and_boundaries() {
        let insts = randomized_instances(1);
        assert_eq!(insts.len(), 20);
        assert!(insts.iter().any(|i| i.region.len() == 9));
        assert!(insts.iter().any(|i| i.bc.is_periodic()));
        assert!(insts.iter().any(|i| uniform_boundary_spin(&i.bc) == Some(Spin::Down)));
        assert!(insts
            .iter()
            .all(|i| i.params.beta > 0.0 && i.params.beta <= 2.0 && i.params.h.abs() <= 1.0));
        assert_eq!(
            randomized_instances(1)[7].params.kernel,
            insts[7].params.kernel,
            "instances are a function of the seed"
        );
    }

    #[test]
    fn fixed_boundary_transform_fails_for_the_dynamics() {
        // T does not commute with the exterior-field term of ν_Λ^τ
        let inst = Instance::new(sq(2, 2), BoundaryCondition::plus(), params(0.8, (0.5, 1.0, 0.7)));
        let r = check_transform_stationary(&inst, TransformCase::FlipSelfCoupling).unwrap();
        assert!(r.residual > 1e-3, "{r:?}");
        let g = check_transform_gibbs(&inst, TransformCase::FlipSelfCoupling).unwrap();
        assert!(g.passed(), "{g:?}");
    }

    #[test]
    fn control_result_expects_a_large_defect() {
        let r = check_ising_control(&ising_control_instance()).unwrap();
        assert_eq!(r.expect, Expect::Above);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn instance_suite_skips_inapplicable_families() {
        let inst = Instance::new(
            sq(2, 2),
            BoundaryCondition::plus(),
            PcaParams::new(0.5, 0.2, CouplingKernel::nearest_neighbor_2d(0.3, 0.4, 0.2)).unwrap(),
        );
        let (rows, skipped) = instance_suite(&inst, &CheckFamily::ALL, 3).unwrap();
        assert!(rows.iter().all(CheckResult::passed), "{rows:?}");
        let names: Vec<_> = skipped.iter().map(|(f, _)| *f).collect();
        assert_eq!(
            names,
            vec![
                CheckFamily::PeriodicIdentity,
                CheckFamily::Transform,
                CheckFamily::Ising
            ]
        );
    }

    #[test]
    fn odd_torus_skips_transforms_and_ising() {
        let inst = Instance::new(sq(3, 3), BoundaryCondition::Periodic, params(0.7, (0.0, 1.0, 0.5)));
        let (rows, skipped) = instance_suite(&inst, &CheckFamily::ALL, 3).unwrap();
        assert!(rows.iter().all(CheckResult::passed), "{rows:?}");
        let names: Vec<_> = skipped.iter().map(|(f, _)| *f).collect();
        assert_eq!(names, vec![CheckFamily::Transform, CheckFamily::Ising]);
    }
}
